"""Command-line entry point: ``synthflow <command> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .docmodel import AnnotatedDocument
from .errors import SynthflowError
from .evaluation import (cohen_kappa, corpus_rule_stats, corpus_stats, entity_prf, format_table,
                         relation_prf)
from .graph import build_graph, to_dot
from .relext import BRACKET_CHAIN_MODES, PRESETS, RuleConfig, extract
from .standoff import (CorpusHandle, export_json, load_corpus, load_file_list,
                       serialize_document)
from .tagger import BaselineTagger, PassthroughTagger, TaggerLexicon

log = logging.getLogger("synthflow")

TAGGERS = ("gold", "baseline", "standoff-pred")
FORMATS = ("json", "dot", "ann", "table")
EXTENSIONS = {"json": ".json", "dot": ".dot", "ann": ".ann", "table": ".txt"}


@dataclass
class RunConfig:
    command: str
    input: Path | None = None
    gold: Path | None = None
    pred: Path | None = None
    out: Path | None = None
    docs: Path | None = None
    tagger: str = "gold"
    lexicon: Path | None = None
    ablation: str = "full"
    bracket_chain: str = "link"
    flip_condition: bool = False
    keep_longest: bool = False
    fail_fast: bool = False
    format: str | None = None
    jobs: int = 1

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> RunConfig:
        fields = cls.__dataclass_fields__
        return cls(**{k: v for k, v in vars(ns).items() if k in fields})

    def rule_config(self) -> RuleConfig:
        return RuleConfig.preset(self.ablation, bracket_chain=self.bracket_chain)

    def validate(self, *required: str):
        for name in required:
            if getattr(self, name) is None:
                raise UsageError(f"{self.command} requires --{name}")
        for name in ("input", "gold", "pred", "lexicon"):
            path = getattr(self, name)
            if path is not None and not path.is_dir():
                raise UsageError(f"--{name} {path} is not a directory")
        if self.docs is not None and not self.docs.is_file():
            raise UsageError(f"--docs {self.docs} is not a file")
        if self.tagger == "standoff-pred" and self.pred is None:
            raise UsageError("--tagger standoff-pred requires --pred")


class UsageError(Exception):
    pass


def _load(cfg: RunConfig, path: Path) -> CorpusHandle:
    corpus = load_corpus(path, fail_fast=cfg.fail_fast, flip_condition=cfg.flip_condition)
    for where, exc in corpus.errors.items():
        print(f"error: {where}: {exc}", file=sys.stderr)
    if cfg.docs is not None:
        corpus = corpus.subset(load_file_list(cfg.docs))
    return corpus


def _tagger(cfg: RunConfig, pred: CorpusHandle | None):
    if cfg.tagger == "baseline":
        lexicon = TaggerLexicon.load(cfg.lexicon) if cfg.lexicon else None
        return BaselineTagger(lexicon)
    if cfg.tagger == "standoff-pred":
        return PassthroughTagger(pred.documents)
    return PassthroughTagger()


def _extract_one(doc: AnnotatedDocument, tagger, rule_config: RuleConfig, keep_longest: bool):
    entities = tagger.tag_document(doc)
    return extract(doc, entities, rule_config, resolve_overlaps=keep_longest)


def _extract_job(args):
    doc, tagger, rule_config, keep_longest = args
    try:
        return _extract_one(doc, tagger, rule_config, keep_longest), None
    except SynthflowError as exc:
        return None, exc


def _run_extraction(cfg: RunConfig, docs, tagger):
    rule_config = cfg.rule_config()
    jobs = [(d, tagger, rule_config, cfg.keep_longest) for d in docs]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_extract_job, jobs, chunksize=8))
    else:
        results = [_extract_job(j) for j in jobs]
    out, failed = [], 0
    for doc, (extraction, exc) in zip(docs, results):
        if exc is not None:
            print(f"error: {doc.doc_id}: {exc}", file=sys.stderr)
            failed += 1
            if cfg.fail_fast:
                break
            continue
        for d in extraction.diagnostics:
            print(f"warning: {doc.doc_id}: {d}", file=sys.stderr)
        out.append(extraction)
    return out, failed


def _render(extraction, fmt: str) -> str:
    doc = extraction.document()
    if fmt == "json":
        return export_json(doc, extraction.rules)
    if fmt == "ann":
        return serialize_document(doc)[1]
    if fmt == "dot":
        return to_dot(build_graph(doc, relations=extraction.predictions))
    rows = [(p.relation.id, p.rule, p.label.value, doc.entity(p.source).text, doc.entity(p.target).text)
            for p in extraction.predictions]
    return format_table(("Id", "Rule", "Label", "From", "To"), rows, title=f"[{doc.doc_id}]")


def _emit(cfg: RunConfig, items):
    """Write (doc_id, text, extension) items to --out or stdout, in order."""
    if cfg.out is None:
        for _, text, _ in items:
            sys.stdout.write(text)
        return
    cfg.out.mkdir(parents=True, exist_ok=True)
    for doc_id, text, ext in items:
        with open(cfg.out / f"{doc_id}{ext}", "w", encoding="utf-8", newline="") as f:
            f.write(text)


def cmd_extract(cfg: RunConfig) -> int:
    cfg.validate("input")
    fmt = cfg.format or "json"
    corpus = _load(cfg, cfg.input)
    pred = _load(cfg, cfg.pred) if cfg.tagger == "standoff-pred" else None
    extractions, failed = _run_extraction(cfg, corpus.documents, _tagger(cfg, pred))
    # graphs are built even for non-dot output so cycles surface as errors
    items = []
    for x in extractions:
        try:
            if fmt != "dot":
                build_graph(x.document(), relations=x.predictions)
            items.append((x.doc.doc_id, _render(x, fmt), EXTENSIONS[fmt]))
        except SynthflowError as exc:
            print(f"error: {x.doc.doc_id}: {exc}", file=sys.stderr)
            failed += 1
        if fmt == "ann" and cfg.out is not None:
            items.append((x.doc.doc_id, x.doc.text, ".txt"))
    _emit(cfg, items)
    return 1 if failed or corpus.errors else 0


def _print_reports(cfg: RunConfig, reports: dict):
    if (cfg.format or "table") == "json":
        text = json.dumps({k: v.to_dict() for k, v in reports.items()}, sort_keys=True, indent=2) + "\n"
    else:
        text = "\n".join(r.format_table() for r in reports.values())
    if cfg.out is not None:
        cfg.out.parent.mkdir(parents=True, exist_ok=True)
        cfg.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_eval(cfg: RunConfig) -> int:
    cfg.validate("gold")
    gold = _load(cfg, cfg.gold)
    reports = {}
    failed = 0
    if cfg.pred is not None:
        pred = _load(cfg, cfg.pred)
        index = pred.by_id()
        docs = [d for d in gold.documents if d.doc_id in index]
        missing = [d.doc_id for d in gold.documents if d.doc_id not in index]
        for m in missing:
            print(f"error: no prediction for {m}", file=sys.stderr)
        preds = [index[d.doc_id] for d in docs]
        if any(p.entities for p in preds):
            reports["entities_coarse"] = entity_prf(docs, preds, "coarse")
            reports["entities_fine"] = entity_prf(docs, preds, "fine")
        if any(p.relations for p in preds):
            reports["relations"] = relation_prf(docs, preds)
        failed += len(missing)
    else:
        if cfg.tagger == "baseline":
            tagger = _tagger(cfg, None)
            tagged = [d.with_annotations(tagger.tag_document(d), ()) for d in gold.documents]
            reports["entities_coarse"] = entity_prf(gold.documents, tagged, "coarse")
            reports["entities_fine"] = entity_prf(gold.documents, tagged, "fine")
        extractions, failed = _run_extraction(cfg, gold.documents, PassthroughTagger())
        by_id = {x.doc.doc_id: x.predictions for x in extractions}
        reports["relations"] = relation_prf([d for d in gold.documents if d.doc_id in by_id], by_id)
    _print_reports(cfg, reports)
    return 1 if failed or gold.errors else 0


def cmd_agree(cfg: RunConfig) -> int:
    cfg.validate("gold", "pred")
    a, b = _load(cfg, cfg.gold), _load(cfg, cfg.pred)
    bi = b.by_id()
    shared = [d for d in a.documents if d.doc_id in bi]
    if not shared:
        print("error: the two annotation directories share no documents", file=sys.stderr)
        return 1
    report = cohen_kappa(shared, [bi[d.doc_id] for d in shared])
    _print_reports(cfg, {"agreement": report})
    return 1 if a.errors or b.errors else 0


def cmd_stats(cfg: RunConfig) -> int:
    cfg.validate("input")
    corpus = _load(cfg, cfg.input)
    _print_reports(cfg, {"corpus": corpus_stats(corpus.documents)})
    return 1 if corpus.errors else 0


def cmd_rules_report(cfg: RunConfig) -> int:
    cfg.validate("gold")
    gold = _load(cfg, cfg.gold)
    extractions, failed = _run_extraction(cfg, gold.documents, PassthroughTagger())
    index = gold.by_id()
    stats = corpus_rule_stats((index[x.doc.doc_id], x.predictions) for x in extractions)
    _print_reports(cfg, {"rules": stats})
    return 1 if failed or gold.errors else 0


def cmd_export(cfg: RunConfig) -> int:
    cfg.validate("input")
    fmt = cfg.format or "json"
    corpus = _load(cfg, cfg.input)
    items, failed = [], 0
    for doc in corpus.documents:
        try:
            if fmt == "json":
                items.append((doc.doc_id, export_json(doc), ".json"))
            elif fmt == "dot":
                items.append((doc.doc_id, to_dot(build_graph(doc)), ".dot"))
            elif fmt == "ann":
                txt, ann = serialize_document(doc)
                items += [(doc.doc_id, ann, ".ann"), (doc.doc_id, txt, ".txt")] if cfg.out else \
                         [(doc.doc_id, ann, ".ann")]
            else:
                raise UsageError("export supports --format json, dot or ann")
        except SynthflowError as exc:
            print(f"error: {doc.doc_id}: {exc}", file=sys.stderr)
            failed += 1
    _emit(cfg, items)
    return 1 if failed or corpus.errors else 0


COMMANDS = {
    "extract": cmd_extract,
    "eval": cmd_eval,
    "agree": cmd_agree,
    "stats": cmd_stats,
    "rules-report": cmd_rules_report,
    "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", type=Path, help="directory of .txt/.ann pairs")
    common.add_argument("--gold", type=Path, help="gold annotation directory (annotator A for agree)")
    common.add_argument("--pred", type=Path, help="predicted annotation directory (annotator B for agree)")
    common.add_argument("--out", type=Path, help="output directory (extract/export) or file (reports)")
    common.add_argument("--docs", type=Path, help="file listing the document ids to use, one per line")
    common.add_argument("--tagger", choices=TAGGERS, default="gold")
    common.add_argument("--lexicon", type=Path, help="directory overriding the baseline tagger lexicons")
    common.add_argument("--ablation", choices=sorted(PRESETS), default="full")
    common.add_argument("--bracket-chain", choices=BRACKET_CHAIN_MODES, default="link")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--flip-condition", action="store_true",
                        help="reverse Condition arguments on load")
    common.add_argument("--fail-fast", action="store_true")
    common.add_argument("--keep-longest", action="store_true",
                        help="resolve overlapping entities by keeping the longest")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for extraction")

    parser = argparse.ArgumentParser(prog="synthflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "extract": "tag (or pass through) entities, extract relations, write graphs",
        "eval": "entity and relation precision/recall/F1 against gold",
        "agree": "Cohen's kappa between two annotation directories",
        "stats": "corpus statistics",
        "rules-report": "per-rule coverage and accuracy against gold",
        "export": "re-emit a corpus as JSON, DOT or standoff",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    cfg = RunConfig.from_args(ns)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        warnings.showwarning = _show_warning
        try:
            return COMMANDS[cfg.command](cfg)
        except UsageError as exc:
            parser.error(str(exc))
        except (SynthflowError, OSError, KeyError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())

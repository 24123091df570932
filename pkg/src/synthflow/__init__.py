"""Synthesis flow graphs from annotated materials-synthesis paragraphs."""
from .docmodel import (COARSE_OF, MATERIAL_LABELS, PROPERTY_LABELS, AnnotatedDocument, CoarseGroup,
                       EdgeLabel, Entity, Relation, Span, VertexLabel, coarse_of, keep_longest,
                       parse_edge_label, parse_label, parse_vertex_label)
from .errors import *  # noqa: F401,F403
from .evaluation import (PRF, CorpusStats, EvalReport, KappaReport, RuleStats, cohen_kappa,
                         confusion_kappa, corpus_rule_stats, corpus_stats, entity_prf, kappa,
                         relation_prf, rule_stats, two_way_kappa)
from .graph import (Cluster, GraphEdge, SynthesisGraph, build_graph, check_order, merge_coreference,
                    to_dot, topo_order)
from .relext import (PRESETS, RULES, Extraction, Layout, PredictedRelation, RuleConfig, extract,
                     is_bracketed)
from .standoff import (CorpusHandle, annotation_signature, document_from_dict, export_json,
                       load_corpus, load_file_list, load_sample, parse_document, read_document,
                       serialize_document, write_document)
from .tagger import BaselineTagger, PassthroughTagger, TaggerLexicon, is_formula
from .textprep import (OffsetMap, Token, TokenizedText, analyze, normalize, split_sentences,
                       token_distance, tokenize)

__version__ = "0.1.0"

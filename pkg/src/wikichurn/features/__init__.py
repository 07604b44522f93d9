"""Feature groups G1-G5 for editor records."""

from .activity import ActivityFeatures, QualityFeatures, activity_features, quality_features
from .empath import LexiconPack, empath_features
from .encoder import FileEncoder, HashingEncoder, sentence_vector
from .matrix import (
    GROUPS,
    FeatureVector,
    Normalization,
    assemble_matrix,
    column_names,
    common_words_for,
    design_matrix,
    featurize_record,
    parse_groups,
    read_features,
    write_features,
)
from .text import TAGSET, SuffixTagger, clean_profile_text, pos_features

__all__ = [
    "GROUPS",
    "TAGSET",
    "ActivityFeatures",
    "FeatureVector",
    "FileEncoder",
    "HashingEncoder",
    "LexiconPack",
    "Normalization",
    "QualityFeatures",
    "SuffixTagger",
    "activity_features",
    "assemble_matrix",
    "clean_profile_text",
    "column_names",
    "common_words_for",
    "design_matrix",
    "empath_features",
    "featurize_record",
    "parse_groups",
    "pos_features",
    "quality_features",
    "read_features",
    "sentence_vector",
    "write_features",
]

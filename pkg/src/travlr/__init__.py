"""Deterministic generator and evaluation kit for a synthetic grid-world
visio-linguistic benchmark: four binary query tasks over rendered scenes,
with pair-disjoint train/OOD splits and a macro-F1 scoring harness."""

from .errors import (
    GridFull,
    InfeasiblePartition,
    InvalidInput,
    MissingPrediction,
    ParseError,
    ReferentError,
    SamplingExhausted,
    TaskMismatch,
    TravlrError,
    UnknownId,
)
from .scene import (
    COLOURS,
    GRID_SIZE,
    SHAPES,
    Attribute,
    Colour,
    GridPos,
    ObjectSpec,
    Scene,
    Shape,
    attribute_matches,
    canonicalize,
    select,
    validate_scene,
)
from .semantics import (
    TASKS,
    CardinalityQuery,
    ComparisonQuery,
    ComparisonRel,
    PairKey,
    QuantifiedQuery,
    Quantifier,
    Query,
    SpatialQuery,
    SpatialRel,
    eval_query,
    pair_key,
    task_of,
    validate_query,
)
from .textgen import (
    PREAMBLE,
    SEP_TOKEN,
    concat_text_input,
    parse_caption,
    parse_query,
    render_caption,
    render_query,
)
from .rng import (
    STREAM_EXAMPLE,
    STREAM_FEWSHOT,
    STREAM_PARTITION,
    STREAM_QUERY_SPLIT,
    STREAM_VIEW,
    substream,
)
from .splitting import (
    DEFAULT_SAMPLER_CONFIG,
    LabeledExample,
    PairPartition,
    SamplerConfig,
    SplitPlan,
    add_distractors,
    build_split_plan,
    pair_space,
    partition_pairs,
    query_space,
    sample_core_example,
    sample_example,
)
from .rendering import DEFAULT_RENDER_CONFIG, RenderConfig, blank_image, render_scene
from .dataset import (
    SPLITS,
    VIEWS,
    DatasetSpec,
    ExampleRecord,
    SplitSizes,
    build_dataset,
    default_sizes,
    generate_record,
    load_manifest,
    materialize_view,
    sample_fewshot,
    verify_dataset,
    write_view,
)
from .evalkit import (
    RunAggregate,
    RunSummary,
    aggregate_runs,
    convergence_test,
    error_by_object_count,
    error_by_pair,
    load_predictions,
    macro_f1,
    predicted_vs_actual_counts,
    with_threshold,
    write_csv,
)

__version__ = "0.1.0"

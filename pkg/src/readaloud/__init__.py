"""Game-based phonics reading practice and assessment toolkit.

A pupil reads letters, phonemes, numbers and words aloud; a constrained
template recognizer scores each utterance against the small set of items on
screen; correct readings power a deterministic bubble-launching game; and
every attempt feeds proficiency tracking, flagging, and an append-only
reading record that teachers and parents can query over HTTP.
"""

from .errors import ReadAloudError
from .item_bank import (
    ItemBank,
    PhonicsItem,
    SelectionRequest,
    default_bank,
    load_bank,
    load_bank_file,
    load_bank_text,
    select_items,
)
from .audio import AudioClip, loudness_dbfs, read_wav, synth_utterance, write_wav
from .recognizer import (
    FeatureSequence,
    RecognitionResult,
    Template,
    build_template,
    classify,
    classify_clip,
    extract_features,
    xcorr_score,
)
from .game_core import Command, GameConfig, GameEvent, GameState, new_game, replay, tick
from .assessment import (
    Attempt,
    Flag,
    PupilProfile,
    SessionConfig,
    SessionRecord,
    confidence_index,
    generate_flags,
    progression_check,
    run_session,
    update_proficiency,
)
from .records import EventStore, RecordEvent, Remark, import_archive, import_legacy
from .simulate import SimulationSpec, render_report, run_simulation

__version__ = "0.1.0"

__all__ = [
    "ReadAloudError",
    "ItemBank",
    "PhonicsItem",
    "SelectionRequest",
    "default_bank",
    "load_bank",
    "load_bank_file",
    "load_bank_text",
    "select_items",
    "AudioClip",
    "loudness_dbfs",
    "read_wav",
    "synth_utterance",
    "write_wav",
    "FeatureSequence",
    "RecognitionResult",
    "Template",
    "build_template",
    "classify",
    "classify_clip",
    "extract_features",
    "xcorr_score",
    "Command",
    "GameConfig",
    "GameEvent",
    "GameState",
    "new_game",
    "replay",
    "tick",
    "Attempt",
    "Flag",
    "PupilProfile",
    "SessionConfig",
    "SessionRecord",
    "confidence_index",
    "generate_flags",
    "progression_check",
    "run_session",
    "update_proficiency",
    "EventStore",
    "RecordEvent",
    "Remark",
    "import_archive",
    "import_legacy",
    "SimulationSpec",
    "render_report",
    "run_simulation",
    "__version__",
]

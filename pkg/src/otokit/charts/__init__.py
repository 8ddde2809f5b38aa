from .renderers import (
    AudiogramSelection,
    ChartDocument,
    SymbolEntry,
    SYMBOL_TABLE,
    audiogram_x,
    audiogram_y,
    render_audiogram,
    render_calorigram,
    render_laddergram,
    render_speech_audiogram,
    render_tympanogram,
)

__all__ = [
    "AudiogramSelection",
    "ChartDocument",
    "SymbolEntry",
    "SYMBOL_TABLE",
    "audiogram_x",
    "audiogram_y",
    "render_audiogram",
    "render_calorigram",
    "render_laddergram",
    "render_speech_audiogram",
    "render_tympanogram",
]

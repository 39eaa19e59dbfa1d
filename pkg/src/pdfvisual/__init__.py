"""Visual element extraction from PDFs: tables, forms, figures and their captions."""

from .backend import PyMuPDFBackend, load_document
from .caption import associate_captions, heuristic_score
from .config import PipelineConfig
from .elements import FILTER_REASONS, VisualElement
from .filters import apply_filters, detect_watermark
from .forms import detect_form
from .merge import iou_overlap, merge_images
from .metrics import GroundTruth, evaluate, levenshtein_similarity
from .pipeline import DocumentManifest, Providers, run_pipeline
from .primitives import (
    BoundingBox,
    EncryptedPdf,
    ImageRegion,
    MalformedPdf,
    PageModel,
    TextBlock,
    UndecodableImage,
)
from .tables import detect_table
from .textnorm import normalize_text

__version__ = "0.1.0"

__all__ = [
    "FILTER_REASONS",
    "BoundingBox",
    "DocumentManifest",
    "EncryptedPdf",
    "GroundTruth",
    "ImageRegion",
    "MalformedPdf",
    "PageModel",
    "PipelineConfig",
    "Providers",
    "PyMuPDFBackend",
    "TextBlock",
    "UndecodableImage",
    "VisualElement",
    "apply_filters",
    "associate_captions",
    "detect_form",
    "detect_table",
    "detect_watermark",
    "evaluate",
    "heuristic_score",
    "iou_overlap",
    "levenshtein_similarity",
    "load_document",
    "merge_images",
    "normalize_text",
    "run_pipeline",
]

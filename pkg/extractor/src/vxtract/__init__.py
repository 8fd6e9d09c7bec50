"""Video on-ramp for the detection engine.

Decodes clips, applies the pixel-domain training augmentations, runs a frozen
backbone over planned frame windows, and writes mode-B .vemb files; also
re-encodes clips as H.264 at fixed CRF levels for dataset preparation. The
engine is consumed only through its published file formats.
"""

from .augment import AugmentationDraw, AugmentationPolicy, apply_augmentation, augment_video, plan_augmentation
from .backbones import load_backbone, register
from .errors import EncoderError, ExtractorError, JobError
from .extract import ExtractionJob, decode_video, run_job
from .plan import frame_indices, uniform_starts, train_starts
from .reencode import CRF_LEVELS, reencode_crf
from .vemb import write_mode_b

__version__ = "0.1.0"

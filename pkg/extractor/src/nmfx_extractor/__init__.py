"""Feature exporter: runs a pretrained backbone over an image directory and
writes the feature tensor + dataset manifest that the nmfx toolkit consumes.
"""

from nmfx_extractor.extract import BACKBONES, ExtractorConfig, extract

__version__ = "0.1.0"

__all__ = ["BACKBONES", "ExtractorConfig", "extract"]

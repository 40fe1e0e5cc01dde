"""Audio-visual music analysis toolkit.

Psychoacoustic audio descriptors, affective color features, statistical
aggregation, multimodal fusion and classification benchmarking for music
videos, plus shot-activity visualization utilities.
"""

__version__ = "0.1.0"

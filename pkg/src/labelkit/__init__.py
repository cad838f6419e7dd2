"""Self-hosted image annotation platform.

Pre-annotates images with pluggable detectors, verifies labels against
text embeddings, deduplicates overlapping detections by IoU-graph
clustering, and persists results for human review and export to COCO,
YOLO, Pascal VOC, and CSV.
"""

__version__ = "0.1.0"

"""Point-image-text triplets: assembly, captions and dataset storage."""

from core.triplets.triplet import Domain, Triplet
from core.triplets.store import TripletManifest, read_dataset, read_manifest, write_dataset

__all__ = ["Domain", "Triplet", "TripletManifest", "read_dataset", "read_manifest", "write_dataset"]

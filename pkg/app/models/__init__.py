from .store_snapshot import StoreSnapshotRecord

__all__ = [
    "StoreSnapshotRecord",
]

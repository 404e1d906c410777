from .partition import MetadataRecord, assign_country, read_snapshot
from .index import BuildStats, CountryIndex, build_index, load_index, query, query_vector, save_index

__all__ = [
    "MetadataRecord",
    "assign_country",
    "read_snapshot",
    "BuildStats",
    "CountryIndex",
    "build_index",
    "load_index",
    "query",
    "query_vector",
    "save_index",
]

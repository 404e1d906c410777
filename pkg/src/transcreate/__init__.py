"""Cultural image transcreation toolkit: pipelines over pluggable model
backends, country-partitioned image retrieval, quantitative metrics, dataset
validation, and a human-evaluation service."""

__version__ = "0.1.0"

from .countries import Country, all_countries, country
from .records import ImageRecord

__all__ = ["Country", "ImageRecord", "all_countries", "country", "__version__"]

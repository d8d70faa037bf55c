"""Non-technical loss detection from monthly consumption series: windowing,
generic and NTL-specific features, FDR-controlled selection and a seeded
classifier benchmark."""

__version__ = "0.1.0"

from .core import (CustomerSeries, EmptyResult, Family, FeatureMatrix, FeatureName,  # noqa: E402
                   MalformedName, NtlError, TargetVector, format_feature_name,
                   parse_feature_name)

__all__ = ["CustomerSeries", "EmptyResult", "Family", "FeatureMatrix", "FeatureName",
           "MalformedName", "NtlError", "TargetVector", "format_feature_name",
           "parse_feature_name", "__version__"]

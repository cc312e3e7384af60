"""Spreadsheet structure recovery, schema matching, clustering and flat export."""

__version__ = "0.1.0"

# Versions of the on-disk formats written by this release.
FORMAT_VERSIONS = {
    "grid_json": 1,
    "classifier_model": 1,
    "taxonomy": 1,
    "lexicon": 1,
    "bundle": 1,
    "report": 1,
}

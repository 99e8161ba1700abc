"""Span-preserving model of OAI-style gNB configuration files.

Parsing keeps the original bytes untouched; every node records where its
value lives so remediations can be applied as surgical splices and later
verified to be minimal.
"""

from ranguard.gnbconf.diff import ConfigDiff, MinimalChangeVerdict, diff_configs, verify_minimal_change
from ranguard.gnbconf.edits import ConfigEdit, PathNotFound, StaleEdit, apply_edits
from ranguard.gnbconf.parser import (
    ConfigDocument,
    ConfigNode,
    NewlineStyle,
    NodeKind,
    ParseError,
    parse_config,
)
from ranguard.gnbconf.profile import SecurityProfile, extract_security_profile

__all__ = [
    "ConfigDiff",
    "ConfigDocument",
    "ConfigEdit",
    "ConfigNode",
    "MinimalChangeVerdict",
    "NewlineStyle",
    "NodeKind",
    "ParseError",
    "PathNotFound",
    "SecurityProfile",
    "StaleEdit",
    "apply_edits",
    "diff_configs",
    "extract_security_profile",
    "parse_config",
    "verify_minimal_change",
]

"""Extraction of the security-relevant settings from a parsed gNB config."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

from ranguard.gnbconf.parser import ConfigDocument, ConfigNode, NodeKind

_ALGORITHM = re.compile(r"^(nea[0-3]|nia[0-3])$")


@dataclass(frozen=True)
class SecurityProfile:
    """The security block of a gNB config, with the spans each value came from."""

    ciphering_algorithms: tuple[str, ...] = ()
    integrity_algorithms: tuple[str, ...] = ()
    drb_ciphering: str = ""
    drb_integrity: str = ""
    source_spans: Mapping[str, tuple[int, int]] = field(default_factory=dict)
    unrecognized: tuple[str, ...] = ()

    @property
    def empty(self) -> bool:
        return not (
            self.ciphering_algorithms
            or self.integrity_algorithms
            or self.drb_ciphering
            or self.drb_integrity
        )


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token.startswith('"') and token.endswith('"'):
        return token[1:-1].replace('\\"', '"').replace("\\\\", "\\")
    return token


def _algorithm_list(node: ConfigNode | None) -> tuple[str, ...]:
    if node is None:
        return ()
    if node.kind is NodeKind.LIST:
        return tuple(
            _unquote(c.scalar_value) for c in node.children if c.kind is NodeKind.SCALAR
        )
    if node.kind is NodeKind.SCALAR:
        return (_unquote(node.scalar_value),)
    return ()


def extract_security_profile(doc: ConfigDocument) -> SecurityProfile:
    """Read the ``security`` group; a missing group yields an empty profile."""
    security = doc.find("security")
    if security is None or security.kind is not NodeKind.GROUP:
        return SecurityProfile()

    spans: dict[str, tuple[int, int]] = {}

    def tracked(name: str) -> ConfigNode | None:
        node = security.child(name)
        if node is not None:
            spans[name] = node.value_span
        return node

    ciphering = _algorithm_list(tracked("ciphering_algorithms"))
    integrity = _algorithm_list(tracked("integrity_algorithms"))

    def scalar(name: str) -> str:
        node = tracked(name)
        if node is None or node.kind is not NodeKind.SCALAR:
            return ""
        return _unquote(node.scalar_value)

    drb_ciph = scalar("drb_ciphering")
    drb_int = scalar("drb_integrity")
    unrecognized = tuple(a for a in (*ciphering, *integrity) if not _ALGORITHM.match(a))
    return SecurityProfile(
        ciphering_algorithms=ciphering,
        integrity_algorithms=integrity,
        drb_ciphering=drb_ciph,
        drb_integrity=drb_int,
        source_spans=spans,
        unrecognized=unrecognized,
    )

"""Fact generation: entity naming, static facts, probes and dynamic facts."""

from .dynamic import UnresolvedSignal, dynamic_facts, resolve_signal
from .fact import ARITY, SCHEMA, Fact, render_facts, sort_facts
from .naming import BUILTIN_ATOMS, EntityNaming, assign_atoms
from .probes import InjectionError, Probe, ProbeMap, inject_probes, probe_name
from .static import extract_facts, single_stmt_return_call

__all__ = [
    "ARITY",
    "BUILTIN_ATOMS",
    "EntityNaming",
    "Fact",
    "InjectionError",
    "Probe",
    "ProbeMap",
    "SCHEMA",
    "UnresolvedSignal",
    "assign_atoms",
    "dynamic_facts",
    "extract_facts",
    "inject_probes",
    "probe_name",
    "render_facts",
    "resolve_signal",
    "single_stmt_return_call",
    "sort_facts",
]

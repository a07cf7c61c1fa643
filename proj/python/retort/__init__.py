"""Python front end of the retort bioreactive transport simulator."""

from ._core import (
    AuditFailure,
    Deck,
    DeckError,
    IoError,
    R15_STANDARD,
    RetortError,
    RunResult,
    SolverError,
    check_deck,
    cosby_pedotransfer,
    delta15N,
    run,
    set_verbosity,
    sweep,
)

__all__ = [
    "AuditFailure",
    "Deck",
    "DeckError",
    "IoError",
    "R15_STANDARD",
    "RetortError",
    "RunResult",
    "SolverError",
    "check_deck",
    "cosby_pedotransfer",
    "delta15N",
    "run",
    "set_verbosity",
    "sweep",
]

"""Dual-mode proof system and its building blocks: toy lossy encryption,
ideal dual-mode encryption, and oblivious transfer."""

from .protocol import (
    CHOICES,
    DmCrs,
    DmKeys,
    DmProof,
    DmTrapdoor,
    ModeMismatchError,
    dm_crsgen,
    dm_preprocess,
    dm_prove,
    dm_run,
    dm_simulate,
    dm_verify,
    honest_opened_law,
    simulated_opened_law,
)
from .ot import BINDING, HIDING

__all__ = [
    "BINDING",
    "CHOICES",
    "HIDING",
    "DmCrs",
    "DmKeys",
    "DmProof",
    "DmTrapdoor",
    "ModeMismatchError",
    "dm_crsgen",
    "dm_preprocess",
    "dm_prove",
    "dm_run",
    "dm_simulate",
    "dm_verify",
    "honest_opened_law",
    "simulated_opened_law",
]

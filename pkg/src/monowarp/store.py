"""Versioned chain persistence.

Chains are written as .npz archives: numeric state as arrays plus one JSON
metadata entry carrying the format version, model tag, configs, and the
CLI's input-coding record.  Loading a file with the wrong version or
model tag raises instead of silently reinterpreting.
"""

import json
from dataclasses import asdict

import numpy as np

from .dgp import DGPChain, GPChain, MwDGPChain
from .errors import VersionMismatch
from .monogp import MCMCConfig, MonoChain, PriorConfig

FORMAT_VERSION = 1

_ARRAY_FIELDS = {
    "mono-gp": ("grid_x", "z_g", "nu", "theta", "mu_hat", "s2"),
    "gp": ("X", "y", "theta_y", "g"),
    "dgp": ("X", "y", "w", "theta_w", "theta_y", "g"),
    "mw-dgp": ("X", "y", "grid_x", "z_g", "theta_w", "theta_y", "g"),
}


def save_chain(path, chain, coding=None) -> None:
    """Write a fitted chain; `coding` is the CLI's per-column input range."""
    meta = {
        "format_version": FORMAT_VERSION,
        "model": chain.model,
        "diagnostics": chain.diagnostics,
        "coding": coding,
        "priors": asdict(chain.priors) if chain.priors is not None else None,
        "mcmc": asdict(chain.mcmc) if chain.mcmc is not None else None,
    }
    if chain.model == "mono-gp":
        meta.update(n=chain.n, p=chain.p, variant=chain.variant)
    else:
        meta.update(y_mean=chain.y_mean)
    if chain.model == "mw-dgp":
        meta.update(variant=chain.variant)
    if chain.model == "dgp":
        meta.update(fix_warp=chain.fix_warp)
    arrays = {name: getattr(chain, name) for name in _ARRAY_FIELDS[chain.model]}
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_chain(path):
    """Read a chain file; returns (chain, coding)."""
    with np.load(path, allow_pickle=False) as npz:
        try:
            meta = json.loads(str(npz["meta"]))
        except KeyError:
            raise VersionMismatch(f"{path}: not a chain file (missing metadata)") from None
        if meta.get("format_version") != FORMAT_VERSION:
            raise VersionMismatch(
                f"{path}: format version {meta.get('format_version')} != {FORMAT_VERSION}"
            )
        model = meta.get("model")
        if model not in _ARRAY_FIELDS:
            raise VersionMismatch(f"{path}: unknown model tag {model!r}")
        arrays = {name: npz[name] for name in _ARRAY_FIELDS[model]}
    diagnostics = meta.get("diagnostics") or {}
    priors = PriorConfig(**meta["priors"]) if meta.get("priors") else None
    mcmc = MCMCConfig(**meta["mcmc"]) if meta.get("mcmc") else None
    common = dict(priors=priors, mcmc=mcmc, diagnostics=diagnostics)
    if model == "mono-gp":
        chain = MonoChain(n=int(meta["n"]), p=int(meta["p"]), variant=meta["variant"],
                          **common, **arrays)
    elif model == "gp":
        chain = GPChain(y_mean=float(meta["y_mean"]), **common, **arrays)
    elif model == "dgp":
        chain = DGPChain(y_mean=float(meta["y_mean"]),
                         fix_warp=bool(meta.get("fix_warp", False)),
                         **common, **arrays)
    else:
        chain = MwDGPChain(y_mean=float(meta["y_mean"]), variant=meta["variant"],
                           **common, **arrays)
    return chain, meta.get("coding")

from dataclasses import dataclass
from pathlib import Path
from typing import Dict

from spdt.core.errors import RunConfigError
from spdt.core.estimator import FITTED_ETA, FITTED_PSI, fit_all
from spdt.core.params import SpdtParams
from spdt.handlers.command import Command
from spdt.infra.persistence import CipFile, ParamsFile


@dataclass(frozen=True)
class FitSummary:
    params: SpdtParams
    sample_sizes: Dict[str, int]

    def __str__(self) -> str:
        p = self.params
        sizes = " ".join(f"{k}={v}" for k, v in self.sample_sizes.items())
        return (
            f"rho={p.rho_per_sec:.4g}/s q={p.q_per_sec:.4g}/s alpha={p.alpha:.4g} "
            f"xi={p.xi:.4g} p_c={p.p_c_per_sec:.4g}/s [{sizes}]"
        )


class FitCommand(Command):
    """CIP sample file -> fitted parameter file."""

    def __init__(self, cip_file, out_params, step_seconds: int, eta: float = FITTED_ETA, psi: float = FITTED_PSI):
        self.cip_file = Path(cip_file)
        self.out_params = Path(out_params)
        self.step_seconds = step_seconds
        self.eta = eta
        self.psi = psi

    def describe(self) -> dict:
        return {"input": str(self.cip_file), "step_seconds": self.step_seconds, "eta": self.eta, "psi": self.psi}

    def execute(self) -> FitSummary:
        if not self.cip_file.is_file():
            raise RunConfigError(f"CIP file not found: {self.cip_file}")
        cip = CipFile(self.cip_file).load()
        params = fit_all(cip, step_seconds=self.step_seconds, eta=self.eta, psi=self.psi)
        ParamsFile(self.out_params).save(params)
        return FitSummary(params=params, sample_sizes=cip.sizes())

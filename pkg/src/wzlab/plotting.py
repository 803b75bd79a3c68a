"""Static log-log convergence plots."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .rates import bound_argument, s_q  # noqa: E402


def plot_curves(curves, fits, path, q: float):
    """Error against ``delta`` per pair, with the OLS line and ``C S_q`` bound."""
    plt.rcParams["svg.hashsalt"] = "wzlab"
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (pair, curve), fit in zip(curves.items(), fits):
        d = curve.deltas
        line = ax.errorbar(d, curve.errors, yerr=curve.stderrs, fmt="o", capsize=3, label=f"{pair} error")
        color = line[0].get_color()
        dd = np.geomspace(d.min(), d.max(), 50)
        if fit is not None and np.isfinite(fit.slope):
            ax.plot(dd, np.exp(fit.intercept) * dd**fit.slope, "-", color=color,
                    label=f"{pair} fit, slope {fit.slope:.3f}")
            ax.plot(dd, fit.fitted_C * s_q(bound_argument(pair, dd), q), ":", color=color,
                    label=f"{pair} C S_{q:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("kernel distance delta(eps)")
    ax.set_ylabel("sup_t L^p error")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

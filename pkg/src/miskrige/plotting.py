"""Static convergence figures.

Figures are rendered with matplotlib to SVG next to the delimited output.
Text stays as SVG text nodes (not paths) so annotations such as the fitted
slope remain machine-checkable, and the hash salt plus suppressed date
metadata keep output stable across runs.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["svg.fonttype"] = "none"
plt.rcParams["svg.hashsalt"] = "miskrige"

from .analysis import fit_rate


def convergence_figure(ns, series, fits=None, predicted_slope=None, title=None):
    """Log-log error-versus-n chart with fitted and predicted reference lines.

    ``series`` maps a label (e.g. ``"l2"``) to its error sequence; ``fits``
    maps the same labels to RateFit results.  The first fitted slope is
    annotated as text.
    """
    ns = np.asarray(ns, dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    markers = {"l2": "o", "linf": "s"}
    annotated = False
    for label, errors in series.items():
        errors = np.asarray(errors, dtype=float)
        ax.loglog(ns, errors, markers.get(label, "o"), ms=6, label=label)
        fit = (fits or {}).get(label)
        if fit is not None:
            line = np.exp(fit.intercept) * ns**fit.slope
            ax.loglog(ns, line, "-", lw=1.0, color="0.3")
            if not annotated:
                ax.text(
                    0.05,
                    0.08,
                    f"slope={fit.slope:.2f}",
                    transform=ax.transAxes,
                    fontsize=11,
                )
                annotated = True
    if predicted_slope is not None:
        ref = series[next(iter(series))]
        anchor = float(np.asarray(ref, dtype=float)[0])
        line = anchor * (ns / ns[0]) ** predicted_slope
        ax.loglog(ns, line, "--", lw=1.0, color="0.6", label=f"predicted n^{predicted_slope:g}")
    ax.set_xlabel("n")
    ax.set_ylabel("error")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best", fontsize=9)
    fig.tight_layout()
    return fig


def save_figure(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_rows(ns, series, out_path, predicted_slope=None, title=None):
    """Fit rates for each series and write the convergence SVG."""
    fits = {}
    for label, errors in series.items():
        try:
            fits[label] = fit_rate(list(zip(ns, errors)))
        except ValueError:
            fits[label] = None
    fig = convergence_figure(ns, series, fits=fits, predicted_slope=predicted_slope, title=title)
    save_figure(fig, out_path)
    return fits


def plot_study_result(result, out_path):
    ns = [r.n for r in result.rows]
    series = {"l2": [r.l2 for r in result.rows], "linf": [r.linf for r in result.rows]}
    fits = {"l2": result.l2_fit, "linf": result.linf_fit}
    fig = convergence_figure(
        ns,
        series,
        fits=fits,
        predicted_slope=result.predicted_l2_slope,
        title=result.study,
    )
    save_figure(fig, out_path)

"""Static roofline SVG."""

import numpy as np

from .analyzer import ridge

_COLORS = {"naive": "#7f7f7f", "coalesced": "#1f77b4", "shared": "#2ca02c", "warp": "#d62728"}
_MARKERS = {"fwd": "o", "bwd_in": "s", "bwd_k": "^"}


def roofline_svg(points, device, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "kernelscope"
    rp = ridge(device)
    ais = [p.ai for p in points] + [rp]
    lo, hi = min(ais) / 4, max(ais) * 4
    x = np.geomspace(min(lo, 1.0), hi, 200)

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.loglog(x, np.minimum(device.peak_fp32, x * device.peak_bw), color="black", lw=1.5)
    ax.axvline(rp, color="0.6", ls=":", lw=1)
    ax.annotate(f"ridge {rp:.2f} FLOP/B", (rp, device.peak_fp32), textcoords="offset points", xytext=(4, -14), fontsize=8)
    for p in points:
        ax.loglog(
            p.ai,
            p.throughput,
            marker=_MARKERS[p.path.value],
            color=_COLORS[p.variant.value],
            ls="none",
            mfc="none" if p.lower_bound_ai else _COLORS[p.variant.value],
            label=f"{p.variant.value} {p.path.value}",
        )
    ax.set_xlabel("Arithmetic intensity (FLOP/byte)")
    ax.set_ylabel("Throughput (GFLOP/s)")
    ax.set_title(f"Roofline: {device.name}")
    ax.grid(True, which="both", lw=0.3)
    ax.legend(fontsize=6, ncol=2, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)

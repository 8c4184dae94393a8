"""Decision-map heatmap rendering."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from .optimizer import DRAWDOWN, INFEASIBLE, DecisionMap  # noqa: E402

# fixed palette; whitespace stays white
PALETTE = {
    DRAWDOWN: "#7f7f7f",
    "GSA": "#1f77b4",
    "ULA": "#2ca02c",
    "LIA": "#ff7f0e",
    "IIA": "#d62728",
    INFEASIBLE: "#ffffff",
}
_ORDER = list(PALETTE)


def render_map(dmap: DecisionMap, path, title: str | None = None) -> None:
    labels = dmap.labels()
    codes = np.vectorize(_ORDER.index)(labels).astype(float)
    fig, ax = plt.subplots(figsize=(6, 5), dpi=100)
    cmap = ListedColormap([PALETTE[k] for k in _ORDER])
    b, psi = dmap.b, dmap.psi
    # cells centred on grid points, nearest-neighbour fill
    db = (b[1] - b[0]) / 2 if len(b) > 1 else 0.5
    dp = (psi[1] - psi[0]) / 2 if len(psi) > 1 else 0.5
    ax.imshow(
        codes.T, origin="lower", aspect="auto", interpolation="nearest", cmap=cmap,
        vmin=-0.5, vmax=len(_ORDER) - 0.5, extent=(b[0] - db, b[-1] + db, psi[0] - dp, psi[-1] + dp),
    )
    ax.set_xlabel("investment risk aversion b")
    ax.set_ylabel("liquidity risk tolerance psi")
    if title:
        ax.set_title(title)
    present = [k for k in _ORDER if (labels == k).any()]
    ax.legend(handles=[Patch(facecolor=PALETTE[k], edgecolor="k", label=k) for k in present],
              loc="upper left", bbox_to_anchor=(1.01, 1.0), frameon=False)
    fig.tight_layout()
    # no timestamp in metadata so repeated renders match
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)

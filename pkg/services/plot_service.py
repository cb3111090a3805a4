from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update({"font.family": "DejaVu Sans", "axes.unicode_minus": False})

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGSIZE = (7.2, 4.0)
DPI = 100


class PlotService:
    """Grouped bar charts; the same data gives the same PNG bytes."""

    @staticmethod
    def grouped_bars(
        path,
        title: str,
        groups: list[str],
        series: dict[str, list[float]],
        y_max: float,
    ) -> Path:
        """
        One cluster of bars per group, one coloured bar per series.

        Args:
            groups: x-axis labels
            series: legend label -> one value per group
            y_max: top of the value axis
        """
        names = list(series)
        positions = np.arange(len(groups))
        width = 0.8 / max(len(names), 1)

        fig, ax = plt.subplots(figsize=FIGSIZE, constrained_layout=True)
        for s, name in enumerate(names):
            values = np.clip(np.asarray(series[name], dtype=float), 0.0, y_max)
            ax.bar(positions - 0.4 + (s + 0.5) * width, values, width, label=name)
        ax.set_title(title)
        ax.set_xticks(positions, groups)
        ax.set_ylim(0.0, y_max if y_max > 0 else 1.0)
        ax.grid(True, axis="y", alpha=0.3)
        if names:
            ax.legend(loc="best", fontsize=8)

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        # no Software/date chunks, so reruns are byte-identical
        fig.savefig(path, format="png", dpi=DPI, metadata={"Software": None})
        plt.close(fig)
        return path

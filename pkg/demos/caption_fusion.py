"""How the fusion weight alpha trades layout cues against semantic similarity.

A figure sits between two enumerated captions at equal distance. The one
above is bold, so layout cues lean towards it, but it belongs to the figure
above. A scripted similarity provider stands in for a cross-modal embedding
model and knows the right answer. Sweeping alpha shows where layout starts
to overrule it.
"""

import numpy as np

from pdfvisual import PipelineConfig
from pdfvisual.caption import score_candidates
from pdfvisual.elements import VisualElement
from pdfvisual.primitives import BoundingBox, PageModel, TextBlock
from pdfvisual.providers import ScriptedSimilarityProvider


def line(y, text, bold=False):
    return TextBlock.single(BoundingBox(100, y, 300, y + 12), text, 10.0, bold)


page = PageModel(0, 612, 792, (), (
    line(276, "Figure 1: Sensor layout", bold=True),
    line(406, "Figure 2: Calibration error over time"),
    line(600, "Body text continues down here."),
), (), ())
figure = VisualElement("fig", "image", 0, BoundingBox(100, 294, 400, 400),
                       raster=np.zeros((4, 4, 3), np.uint8))

# the oracle "sees" a calibration plot
oracle = ScriptedSimilarityProvider(lambda text, el: 0.8 if "Calibration" in text else -0.2)

print(f"{'alpha':>5}  {'winner':40} {'H':>5} {'S':>5} {'F':>5}")
for alpha in (0.0, 0.2, 0.45, 0.6, 0.8, 0.9, 1.0):
    cfg = PipelineConfig(fusion_alpha=alpha)
    best = score_candidates(figure, [page], oracle, cfg)[0]
    print(f"{alpha:5.2f}  {best.block.text:40} {best.H:5.2f} {best.S:5.2f} {best.F:5.2f}")

print("\nall candidates at the default alpha:")
for c in score_candidates(figure, [page], oracle, PipelineConfig()):
    f = c.features
    print(f"  {c.block.text:40} H={c.H:.2f} S={c.S:.2f} F={c.F:.2f} "
          f"dist={f.distance_pts:.0f}pt keyword={f.keyword_hit} enum={f.enumeration_hit}")

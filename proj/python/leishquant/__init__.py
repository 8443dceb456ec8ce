"""Python interface to the infection quantification pipeline.

The heavy lifting lives in the compiled ``_leishquant`` extension; this
package converts its JSON payloads into plain dictionaries.
"""

import json

import _leishquant as _core

__all__ = [
    "analyze",
    "analyze_file",
    "synthesize",
    "contrast_stretch",
    "otsu_threshold",
    "label_regions",
    "em_fit",
    "evaluate",
    "segmentation_accuracy",
]


def _config_json(config):
    return json.dumps(config) if config else ""


def _unpack(raw):
    return {
        "analysis": json.loads(raw["analysis"]),
        "report": raw["report"],
        "csv": raw["csv"],
    }


def analyze(macrophage, parasite, cytoplasm, config=None, name="array"):
    """Run the full pipeline on three 2-D uint8 channel arrays.

    Returns a dict with the parsed ``analysis`` sidecar, the rendered
    ``report`` text and the per-region ``csv`` dump.
    """
    return _unpack(_core.analyze(macrophage, parasite, cytoplasm, _config_json(config), name))


def analyze_file(path, config=None):
    """Run the full pipeline on an RGB image file or channel manifest."""
    return _unpack(_core.analyze_file(path, _config_json(config)))


def synthesize(spec):
    """Generate a synthetic scene from a spec dict; returns channel arrays
    plus the parsed ground truth."""
    raw = _core.synthesize(json.dumps(spec))
    return {
        "macrophage": raw["macrophage"],
        "parasite": raw["parasite"],
        "cytoplasm": raw["cytoplasm"],
        "truth": json.loads(raw["truth"]),
    }


contrast_stretch = _core.contrast_stretch
otsu_threshold = _core.otsu_threshold
label_regions = _core.label_regions
em_fit = _core.em_fit
evaluate = _core.evaluate
segmentation_accuracy = _core.segmentation_accuracy

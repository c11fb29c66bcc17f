"""JSON encoding for verdicts, series estimates and witnesses."""
import json
import math
from fractions import Fraction

import numpy as np


class ReportEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, Fraction):
            return f"{o.numerator}/{o.denominator}"
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, (np.floating, np.bool_)):
            return o.item()
        if hasattr(o, 'to_dict'):
            return o.to_dict()
        if hasattr(o, 'to_json'):
            return o.to_json()
        return super().default(o)


def _finite(obj):
    """Replace non-finite floats by the strings 'inf', '-inf', 'nan' (plain JSON has no such numbers)."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return 'nan' if math.isnan(obj) else ('inf' if obj > 0 else '-inf')
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def serialize(obj):
    """Recursively convert report objects, numpy values and Fractions for JSON."""
    return _finite(json.loads(json.dumps(obj, cls=ReportEncoder)))


def dumps(obj) -> str:
    return json.dumps(serialize(obj), indent=2, allow_nan=False)

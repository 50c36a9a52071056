"""
Stroke templates for the procedural handwriting backend

Each glyph is a tuple of strokes; a stroke is a polyline of (x, y) points in
glyph units with the baseline at y = 0, x-height 0.5, cap height 1 and
descenders down to -0.3. x starts at 0 on the glyph's left edge.
"""
from typing import Dict, Tuple

Stroke = Tuple[Tuple[float, float], ...]
Glyph = Tuple[Stroke, ...]

X_HEIGHT = 0.5
CAP_HEIGHT = 1.0
DESCENDER = -0.3
SPACE_ADVANCE = 0.35
GLYPH_GAP = 0.14

_O_UPPER = ((0.3, 1), (0.1, 0.9), (0, 0.5), (0.1, 0.1), (0.3, 0), (0.5, 0.1), (0.6, 0.5), (0.5, 0.9), (0.3, 1))
_P_BOWL = ((0, 0), (0, 1), (0.4, 1), (0.5, 0.9), (0.5, 0.6), (0.4, 0.5), (0, 0.5))
_C_LOWER = ((0.4, 0.4), (0.3, 0.5), (0.1, 0.5), (0, 0.35), (0, 0.15), (0.1, 0), (0.3, 0), (0.4, 0.1))
_BOWL_RIGHT = ((0.1, 0.5), (0.3, 0.5), (0.4, 0.35), (0.4, 0.15), (0.3, 0), (0.1, 0), (0, 0.15))
_ARCH = ((0, 0.35), (0.12, 0.5), (0.3, 0.5), (0.4, 0.35), (0.4, 0))

GLYPHS: Dict[str, Glyph] = {
    # capitals
    'A': (((0, 0), (0.3, 1), (0.6, 0)), ((0.12, 0.4), (0.48, 0.4))),
    'B': (((0, 0), (0, 1), (0.4, 1), (0.5, 0.9), (0.5, 0.6), (0.4, 0.5), (0, 0.5)),
          ((0.4, 0.5), (0.55, 0.4), (0.55, 0.1), (0.45, 0), (0, 0))),
    'C': (((0.55, 0.85), (0.4, 1), (0.15, 1), (0, 0.8), (0, 0.2), (0.15, 0), (0.4, 0), (0.55, 0.15)),),
    'D': (((0, 0), (0, 1), (0.35, 1), (0.55, 0.8), (0.55, 0.2), (0.35, 0), (0, 0)),),
    'E': (((0.5, 1), (0, 1), (0, 0), (0.5, 0)), ((0, 0.5), (0.4, 0.5))),
    'F': (((0.5, 1), (0, 1), (0, 0)), ((0, 0.5), (0.4, 0.5))),
    'G': (((0.55, 0.85), (0.4, 1), (0.15, 1), (0, 0.8), (0, 0.2), (0.15, 0), (0.45, 0), (0.55, 0.15),
           (0.55, 0.45), (0.3, 0.45)),),
    'H': (((0, 0), (0, 1)), ((0.55, 0), (0.55, 1)), ((0, 0.5), (0.55, 0.5))),
    'I': (((0.1, 1), (0.4, 1)), ((0.25, 1), (0.25, 0)), ((0.1, 0), (0.4, 0))),
    'J': (((0.5, 1), (0.5, 0.2), (0.35, 0), (0.15, 0), (0, 0.2)),),
    'K': (((0, 0), (0, 1)), ((0.5, 1), (0, 0.45)), ((0.15, 0.6), (0.55, 0))),
    'L': (((0, 1), (0, 0), (0.45, 0)),),
    'M': (((0, 0), (0, 1), (0.35, 0.45), (0.7, 1), (0.7, 0)),),
    'N': (((0, 0), (0, 1), (0.55, 0), (0.55, 1)),),
    'O': (_O_UPPER,),
    'P': (_P_BOWL,),
    'Q': (_O_UPPER, ((0.35, 0.25), (0.6, -0.05))),
    'R': (_P_BOWL, ((0.2, 0.5), (0.55, 0))),
    'S': (((0.5, 0.9), (0.35, 1), (0.15, 1), (0, 0.85), (0.05, 0.6), (0.45, 0.4), (0.55, 0.2), (0.4, 0),
           (0.15, 0), (0, 0.1)),),
    'T': (((0, 1), (0.6, 1)), ((0.3, 1), (0.3, 0))),
    'U': (((0, 1), (0, 0.2), (0.15, 0), (0.4, 0), (0.55, 0.2), (0.55, 1)),),
    'V': (((0, 1), (0.3, 0), (0.6, 1)),),
    'W': (((0, 1), (0.2, 0), (0.4, 0.6), (0.6, 0), (0.8, 1)),),
    'X': (((0, 1), (0.55, 0)), ((0.55, 1), (0, 0))),
    'Y': (((0, 1), (0.3, 0.5), (0.6, 1)), ((0.3, 0.5), (0.3, 0))),
    'Z': (((0, 1), (0.55, 1), (0, 0), (0.55, 0)),),
    # lowercase
    'a': (_C_LOWER, ((0.4, 0.5), (0.4, 0))),
    'b': (((0, 1), (0, 0)), ((0, 0.3),) + _BOWL_RIGHT),
    'c': (_C_LOWER,),
    'd': (((0.4, 1), (0.4, 0)), _C_LOWER),
    'e': (((0, 0.25), (0.4, 0.25), (0.35, 0.45), (0.2, 0.5), (0.05, 0.42), (0, 0.25), (0.05, 0.08), (0.2, 0),
           (0.38, 0.06)),),
    'f': (((0.35, 0.95), (0.25, 1), (0.15, 0.95), (0.12, 0.8), (0.12, 0)), ((0, 0.5), (0.3, 0.5))),
    'g': (((0.4, 0.4), (0.3, 0.5), (0.1, 0.5), (0, 0.35), (0, 0.15), (0.1, 0.05), (0.3, 0.05), (0.4, 0.2)),
          ((0.4, 0.5), (0.4, -0.2), (0.3, -0.3), (0.1, -0.3), (0, -0.2))),
    'h': (((0, 1), (0, 0)), _ARCH),
    'i': (((0.1, 0.5), (0.1, 0)), ((0.1, 0.68), (0.1, 0.72))),
    'j': (((0.2, 0.5), (0.2, -0.2), (0.12, -0.3), (0, -0.25)), ((0.2, 0.68), (0.2, 0.72))),
    'k': (((0, 1), (0, 0)), ((0.35, 0.5), (0, 0.2)), ((0.1, 0.28), (0.4, 0))),
    'l': (((0.05, 1), (0.05, 0.1), (0.12, 0)),),
    'm': (((0, 0.5), (0, 0)), ((0, 0.35), (0.1, 0.5), (0.2, 0.5), (0.28, 0.35), (0.28, 0)),
          ((0.28, 0.35), (0.38, 0.5), (0.48, 0.5), (0.56, 0.35), (0.56, 0))),
    'n': (((0, 0.5), (0, 0)), _ARCH),
    'o': (((0.2, 0.5), (0.05, 0.42), (0, 0.25), (0.05, 0.08), (0.2, 0), (0.35, 0.08), (0.4, 0.25), (0.35, 0.42),
           (0.2, 0.5)),),
    'p': (((0, 0.5), (0, -0.3)), ((0, 0.35),) + _BOWL_RIGHT),
    'q': (((0.4, 0.5), (0.4, -0.3)), _C_LOWER),
    'r': (((0, 0.5), (0, 0)), ((0, 0.3), (0.12, 0.47), (0.3, 0.5))),
    's': (((0.35, 0.45), (0.2, 0.5), (0.05, 0.45), (0.05, 0.32), (0.35, 0.18), (0.35, 0.05), (0.2, 0),
           (0.02, 0.05)),),
    't': (((0.12, 0.85), (0.12, 0.08), (0.2, 0), (0.3, 0.04)), ((0, 0.5), (0.28, 0.5))),
    'u': (((0, 0.5), (0, 0.15), (0.1, 0), (0.3, 0), (0.4, 0.15)), ((0.4, 0.5), (0.4, 0))),
    'v': (((0, 0.5), (0.2, 0), (0.4, 0.5)),),
    'w': (((0, 0.5), (0.14, 0), (0.28, 0.35), (0.42, 0), (0.56, 0.5)),),
    'x': (((0, 0.5), (0.4, 0)), ((0.4, 0.5), (0, 0))),
    'y': (((0, 0.5), (0.2, 0)), ((0.4, 0.5), (0.15, -0.2), (0.05, -0.3))),
    'z': (((0, 0.5), (0.4, 0.5), (0, 0), (0.4, 0)),),
    # digits
    '0': (((0.25, 1), (0.05, 0.85), (0, 0.5), (0.05, 0.15), (0.25, 0), (0.45, 0.15), (0.5, 0.5), (0.45, 0.85),
           (0.25, 1)),),
    '1': (((0.1, 0.8), (0.3, 1), (0.3, 0)),),
    '2': (((0, 0.8), (0.12, 0.97), (0.35, 0.97), (0.48, 0.8), (0.45, 0.6), (0, 0), (0.5, 0)),),
    '3': (((0, 0.9), (0.15, 1), (0.35, 1), (0.48, 0.85), (0.4, 0.6), (0.2, 0.52)),
          ((0.2, 0.52), (0.42, 0.45), (0.5, 0.25), (0.4, 0.05), (0.2, 0), (0, 0.1))),
    '4': (((0.4, 0), (0.4, 1), (0, 0.3), (0.55, 0.3)),),
    '5': (((0.48, 1), (0.08, 1), (0.03, 0.55), (0.25, 0.6), (0.45, 0.5), (0.5, 0.25), (0.4, 0.05), (0.2, 0),
           (0, 0.1)),),
    '6': (((0.45, 0.9), (0.3, 1), (0.12, 0.95), (0, 0.6), (0, 0.2), (0.15, 0), (0.35, 0), (0.5, 0.18),
           (0.48, 0.42), (0.3, 0.55), (0.1, 0.5), (0, 0.35)),),
    '7': (((0, 1), (0.5, 1), (0.18, 0)),),
    '8': (((0.25, 0.55), (0.05, 0.7), (0.07, 0.92), (0.25, 1), (0.43, 0.92), (0.45, 0.7), (0.25, 0.55),
           (0.02, 0.38), (0.02, 0.12), (0.25, 0), (0.48, 0.12), (0.48, 0.38), (0.25, 0.55)),),
    '9': (((0.48, 0.65), (0.35, 0.48), (0.15, 0.48), (0.02, 0.62), (0.05, 0.88), (0.22, 1), (0.4, 0.97),
           (0.5, 0.8), (0.48, 0.3), (0.35, 0.05), (0.15, 0), (0.02, 0.08)),),
    # punctuation
    ' ': (),
    '.': (((0.05, 0), (0.05, 0.04)),),
    ',': (((0.08, 0.04), (0.03, -0.14)),),
    ':': (((0.05, 0), (0.05, 0.04)), ((0.05, 0.42), (0.05, 0.46))),
    ';': (((0.08, 0.04), (0.03, -0.14)), ((0.08, 0.42), (0.08, 0.46))),
    '-': (((0, 0.35), (0.3, 0.35)),),
    '+': (((0, 0.4), (0.4, 0.4)), ((0.2, 0.2), (0.2, 0.6))),
    '=': (((0, 0.3), (0.4, 0.3)), ((0, 0.5), (0.4, 0.5))),
    '/': (((0, -0.1), (0.4, 1)),),
    '(': (((0.2, 1.05), (0.05, 0.6), (0.05, 0.2), (0.2, -0.15)),),
    ')': (((0, 1.05), (0.15, 0.6), (0.15, 0.2), (0, -0.15)),),
    '?': (((0, 0.85), (0.15, 1), (0.35, 1), (0.45, 0.85), (0.4, 0.65), (0.22, 0.5), (0.22, 0.3)),
          ((0.22, 0.04), (0.22, 0))),
    '!': (((0.1, 1), (0.1, 0.3)), ((0.1, 0.04), (0.1, 0))),
    "'": (((0.05, 1), (0.05, 0.8)),),
    '"': (((0.05, 1), (0.05, 0.8)), ((0.2, 1), (0.2, 0.8))),
    '%': (((0, 0), (0.5, 1)), ((0.08, 0.95), (0.0, 0.85), (0.08, 0.75), (0.16, 0.85), (0.08, 0.95)),
          ((0.42, 0.25), (0.34, 0.15), (0.42, 0.05), (0.5, 0.15), (0.42, 0.25))),
    '<': (((0.4, 0.65), (0, 0.4), (0.4, 0.15)),),
    '>': (((0, 0.65), (0.4, 0.4), (0, 0.15)),),
}

# Drawn for characters the table does not cover
SQUIGGLE: Glyph = (((0, 0.2), (0.1, 0.35), (0.2, 0.15), (0.3, 0.35), (0.4, 0.15), (0.5, 0.3)),)


def glyph_width(glyph: Glyph) -> float:
    """Horizontal extent of a glyph in units (space-like glyphs use SPACE_ADVANCE)"""
    xs = [x for stroke in glyph for x, _ in stroke]
    return max(xs) if xs else SPACE_ADVANCE

"""Frozen reference data for the built-in base configuration.

Everything here is either part of the base instance's definition (the
parameter point, the support constants) or a value the toolkit re-derives
exactly on every reproduction run. ``cmd_reproduce`` fails loudly on any
mismatch, so accidental edits to this file are caught immediately.
"""

from fractions import Fraction

# Rank-one increments C_1..C_5 (4x2, row-major).
RANK_ONE = (
    ((-2, 0), (-3, 0), (69, 0), (164, 0)),
    ((0, -5), (0, -5), (0, 165), (0, -82)),
    ((1, 1), (0, 0), (404, 404), (328, 328)),
    ((1, 4), (1, 4), (-95, -380), (0, 0)),
    ((0, 0), (2, 1), (-378, -189), (-492, -246)),
)

# Upper blocks A_1..A_5 of the five outer points.
UPPER = (
    ((-4, 0), (-6, 0)),
    ((-2, -15), (-3, -15)),
    ((2, -1), (-3, -5)),
    ((2, 8), (0, 7)),
    ((0, 0), (2, 1)),
)

# Lower blocks B_1..B_5 of the five outer points.
LOWER = (
    ((138, 0), (328, 0)),
    ((69, 495), (164, -246)),
    ((1685, 1781), (1476, 1230)),
    ((188, -571), (492, 246)),
    ((-378, -189), (-492, -246)),
)

# Support constants (c_1..c_5, d_1..d_5) making the strict pairwise
# inequality table negative at the base configuration.
C_CONSTANTS = (Fraction(0), Fraction(-3650), Fraction(-3318),
               Fraction(5044), Fraction(580))
D_CONSTANTS = (Fraction(58), Fraction(-15, 2), Fraction(772),
               Fraction(57), Fraction(376))

# Slack of the (1,2) row of the inequality table at the constants above:
# 3650 + 58*15 - 6990.
SLACK_12 = Fraction(-2470)

# Test-tensor evaluation points (nu, (s, t)) at which the five cycle
# Jacobian polynomials are certified nonzero.
TEST_POINTS = ((1, (1, 0)), (2, (0, 0)), (3, (0, 1)), (4, (0, 0)), (5, (0, 0)))

# Exact Jacobian determinants at the five test points (probe tensors laid
# out along the cycle), derived once with this toolkit and re-derived on
# every reproduction run.
JACOBIAN_VALUES = (
    Fraction(-191510498176999852725983326035456),
    Fraction(-4386812144742727468435320643584),
    Fraction(-169923108366127127936366346240),
    Fraction(33115210076043406863239675904000),
    Fraction(-17533841893558433927325045227520),
)


def as_dict() -> dict:
    """Golden payload in the serialized (string) form used by the CLI."""
    from .ratlin import rat_str

    def fmt_mat(m):
        return [[rat_str(Fraction(x)) for x in row] for row in m]

    return {
        "rank_one": [fmt_mat(m) for m in RANK_ONE],
        "upper_blocks": [fmt_mat(m) for m in UPPER],
        "lower_blocks": [fmt_mat(m) for m in LOWER],
        "c_constants": [rat_str(c) for c in C_CONSTANTS],
        "d_constants": [rat_str(d) for d in D_CONSTANTS],
        "slack_12": rat_str(SLACK_12),
        "jacobian_test_points": [[nu, [s, t]] for nu, (s, t) in TEST_POINTS],
        "jacobian_values": [rat_str(v) for v in JACOBIAN_VALUES],
    }

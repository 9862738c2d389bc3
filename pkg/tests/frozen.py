"""Reference values frozen from the oracles in ``oracles.py`` (or from closed
forms). ``test_oracles.py`` recomputes each one from its oracle, so a
change here that the oracle does not back fails immediately."""

import math

# geometry
PROJECTION_ON_DIAGONAL_LINE = (0.0, 1.0)  # x=(1,0) onto (0,1) + s(1,1)/sqrt2, normal equations
DISTANCE_TO_X_AXIS = 2.0  # (5,-2) to {y2 = 0}
GS_GAMMA = {(0, 0): 1.0, (1, 1): 1.0, (1, 0): -1.0}  # {(1,0),(1,1)} by hand
ANGLE_30_DEG = 0.5  # sine of 30 degrees
SLOPE_30_DEG = math.tan(math.pi / 6)  # 0.5773502691896257

# simplices (edge length 1 for the regular ones)
RIGHT_TRIANGLE = {"normalized": 1.0, "hausdorff": 0.5, "heights": (1 / math.sqrt(2), 1.0, 1.0)}
RIGHT_TETRAHEDRON = {"normalized": 1.0, "hausdorff": 1 / 6, "heights": (1 / math.sqrt(3), 1.0, 1.0, 1.0)}
EQUILATERAL = {"normalized": math.sqrt(3) / 2, "hausdorff": math.sqrt(3) / 4, "heights": (math.sqrt(3) / 2,) * 3}
REGULAR_TETRAHEDRON = {
    "normalized": math.sqrt(2) / 2,  # 0.7071067811865476
    "hausdorff": math.sqrt(2) / 12,  # 0.11785113019775793
    "heights": (math.sqrt(2 / 3),) * 4,
}

# integrands
K1_EQUILATERAL = math.sqrt(3) / 4  # 0.4330127018922193
K5_REGULAR_TETRAHEDRON = math.sqrt(2) / 12  # 0.117851

# beta numbers: two unit atoms at +-0.1 from the plane, t=1, n=1
BETA_FIXED_P2 = math.sqrt(0.02)  # 0.1414213562373095
BETA_FIXED_P1 = 0.2

# curvature of three unit atoms on an equilateral triangle, K1, p=2
CURVATURE_EQUILATERAL = 1.125  # 6 * (sqrt3/4)^2

# gamma of g(u) = c|u| on the unit interval
GAMMA_ABS_C = 0.3
GAMMA_ABS = 0.15  # c/2

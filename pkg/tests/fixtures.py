"""Frozen golden values for the built-in aircraft model (Ts = 0.5, Q = I).

Regression sentinels only: every value here is re-derived against an
independent oracle at test time (Taylor exponential, QZ Riccati solve,
power iteration). Regenerate by printing the corresponding quantities from
a fresh design build if the model or weights ever change.
"""

CESSNA_A = [
    [0.23996015128605575, -1.2315770836888174e-15, 0.17871287235148245, 0.0],
    [-0.37221756703302084, 1.0, 0.2702641064749285, 0.0],
    [-0.9900875488345969, 1.479961656848483e-15, 0.13885972635578686, 0.0],
    [-48.93540654673509, 64.10000000000002, 2.399234111713967, 1.0],
]

CESSNA_B = [
    -1.2346444968051717,
    -1.4382822342085797,
    -4.482824539963881,
    -1.7998904299526375,
]

CESSNA_RANK = 4

CESSNA_P = [
    [2485.445624617276, -3283.146619914405, -120.18313041461045, -49.87014457065972],
    [-3283.146619914405, 4350.643652628532, 161.39915430931444, 65.55745920884922],
    [-120.18313041461045, 161.39915430931444, 7.417206333942062, 2.332471782603653],
    [-49.87014457065972, 65.55745920884922, 2.332471782603653, 2.0151626730380845],
]

CESSNA_K = [
    -1.8679049276041506,
    2.760003529110376,
    0.24853235503380394,
    0.02136689903068811,
]

CESSNA_C1 = 1.0000000000005835
CESSNA_RHO = 0.999853758399607
CESSNA_C = 9.993421693724377

# SHA-256 over the row-major entries formatted as '%.12e' joined by '|'.
CESSNA_G_SHA256 = "b13c535a9a55aae49f5c3acbe0129f7c977fd95fd0b447f0d6fd166f8ed7fd10"
CESSNA_H_SHA256 = "a260b70720af485c854e313c647d4c8b8e337f96f5350db311842ab86a7f4779"


def matrix_digest(M) -> str:
    import hashlib

    import numpy as np

    payload = b"|".join(f"{v:.12e}".encode() for v in np.asarray(M).ravel())
    return hashlib.sha256(payload).hexdigest()

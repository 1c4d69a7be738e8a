"""
The 5-qudit code, its matching graph and single-error decoding
===============================================================

A walk through the building blocks for a qutrit (q = 3): the check matrix,
the encoder, the detector graph and the three decoders.
Run with ``python notebooks/01_code_and_decoding.py``.
"""

import numpy as np

from qec5.backends import StateVector, stabilizer_expectation, sv_run
from qec5.code5 import build_check_matrix, build_encoder
from qec5.decoders import build_dem, check_success, decode_bm, decode_mwpm
from qec5.graph import build_graph, error_syndrome, hyperedges
from qec5.noise import SDEP, NoiseModel
from qec5.pauli import PauliString

q = 3

# The check matrix (x | z): four cyclic shifts of one generator
H = build_check_matrix(q)
print(H.xz)

# Encode |0>_L and confirm every generator has expectation +1
state, _ = sv_run(build_encoder(q), np.random.default_rng(0),
                  initial=StateVector.basis(q, (0, 0, 0, 0, 0)))
print([round(abs(stabilizer_expectation(state, s)), 6) for s in H.stabilizers()])

# Detector graph for one noiseless cycle: 4 (q - 1) nodes
g = build_graph(H, 1)
print(len(g.nodes), "nodes,", len(g.components()), "component(s)")

# Mixed errors (both X and Z powers) light up more than two nodes
info = hyperedges(H)
print(len(info), "hyperedges; first:", info[0].edge.label, info[0].decompositions)

# Decode every single-qudit error with matching and with belief matching
dem = build_dem(q, 1, NoiseModel(SDEP, 1e-2, q))
rng = np.random.default_rng(1)
ok_mwpm = ok_bm = total = 0
for site in range(5):
    for x in range(q):
        for z in range(q):
            if not (x or z):
                continue
            err = np.array(PauliString.single(q, 5, site, x, z).symplectic())
            events = np.array([error_syndrome(H, site, x, z)])
            est = decode_mwpm(g, events, rng=rng)
            ok_mwpm += check_success((err - est.symplectic()) % q, q)
            est = decode_bm(dem, events, rng=rng)
            ok_bm += check_success((err - est.symplectic()) % q, q)
            total += 1

# Matching misses some mixed errors (equally light wrong explanations);
# belief matching uses the hyperedges and corrects all of them
print(f"MWPM {ok_mwpm}/{total}, BM {ok_bm}/{total}")

"""Regenerate the JSON fixtures in this directory."""

from pathlib import Path

import numpy as np

from locclab import formats
from locclab.basis import computational_basis, domino_basis
from locclab.certify import orthogonal_triple_vectors
from locclab.measure import Povm
from locclab.protocol import ProtocolTree, local_round
from locclab.qcore import HilbertStructure, ket

HERE = Path(__file__).parent


def write(name, obj):
    (HERE / name).write_text(formats.to_json(obj))


def main():
    two_qubits = HilbertStructure([2, 2])
    qubit = HilbertStructure([2])
    write("triple_states.json", formats.dump_state_vectors(two_qubits, orthogonal_triple_vectors()))
    write("pair_states.json", formats.dump_state_vectors(two_qubits, [ket(0, 4), ket(2, 4)]))
    write("qubit_pair_states.json", formats.dump_state_vectors(qubit, [ket(0, 2), np.ones(2) / np.sqrt(2)]))
    tree = ProtocolTree.from_rounds(two_qubits, local_round(two_qubits, 0, [np.diag([1.0, 0]), np.diag([0, 1.0])]))
    write("perfect_protocol.json", formats.dump_protocol(tree))
    write("trivial_povm.json", formats.dump_povm(Povm.trivial(two_qubits)))
    write("qubit_z_povm.json", formats.dump_povm(Povm([np.diag([1.0, 0]), np.diag([0, 1.0])], qubit)))
    write("domino_basis.json", formats.dump_basis(domino_basis()))
    write("computational_3x3_basis.json", formats.dump_basis(computational_basis([3, 3])))


if __name__ == "__main__":
    main()

from .molecule import (AROMATIC, DOUBLE, SINGLE, TRIPLE, Atom, Bond, Molecule, MoleculeError, Violation,
                       allowed_valences, kekulize, valence_check)
from .rings import ring_bonds, sssr
from .smiles import (KekulizeError, SmilesError, UnbalancedError, UnsupportedElementError, WriteError,
                     canonical_smiles, parse_smiles, write_smiles)

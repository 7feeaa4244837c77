"""Linear circuit elements, validation and modified nodal analysis."""

"""Random-partition ensembles, qq-character identities and elliptic limit shapes."""

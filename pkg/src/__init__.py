# Dirichlet-Laplace Shrinkage Package

"""Optimal static mutation strength distributions for the (1+lambda) EA on OneMax."""

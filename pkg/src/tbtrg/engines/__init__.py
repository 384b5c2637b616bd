"""Engines that build the TRG: sequential, partitioned workers and hybrid."""

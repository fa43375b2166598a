"""Dual-polarized massive MIMO downlink with SIC-free rate splitting."""

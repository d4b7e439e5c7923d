"""Test suite for llbarfem."""

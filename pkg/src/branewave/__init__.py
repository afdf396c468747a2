"""Klein-Gordon fields on de Sitter space and on a Robin brane in AdS: exact mode evolution and spectral tools."""

__version__ = "0.1.0"

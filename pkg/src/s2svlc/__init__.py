"""Screen-to-camera OOK link simulator with a blur-reduction receiver."""
__version__ = "0.1.0"

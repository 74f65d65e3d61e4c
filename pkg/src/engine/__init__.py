"""Phase-field fracture engine for 2D micropolar continua."""

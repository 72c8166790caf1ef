"""Services layer: network engine, training, model files and evaluation."""

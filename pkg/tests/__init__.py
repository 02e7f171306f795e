# Test package for BSDM

//! C ABI for the s2d2 solver. Surface lands together with the pipeline.

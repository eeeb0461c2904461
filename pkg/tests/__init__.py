# Tests for the mistake-based merging engine

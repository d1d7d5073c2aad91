# Tests for the C-SPF risk toolkit

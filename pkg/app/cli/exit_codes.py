"""Process exit codes shared by every command."""

EXIT_OK = 0  # permit / success
EXIT_DENY = 1
EXIT_INVALID = 2  # bad input, refused request
EXIT_KEY_NOT_FOUND = 3  # revoked or never enrolled
EXIT_TRANSPORT = 4  # service unreachable, internal failure

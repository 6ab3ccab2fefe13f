# Tests du projet coremag

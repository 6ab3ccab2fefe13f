# Ce fichier indique que le répertoire coremag est un package Python

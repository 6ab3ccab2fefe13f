# Ce fichier indique que le répertoire analysis est un package Python

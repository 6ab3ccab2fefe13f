# Ce fichier indique que le répertoire loadgen est un package Python

# Ce fichier indique que le répertoire channel est un package Python

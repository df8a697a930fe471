# propp-toolkit package root

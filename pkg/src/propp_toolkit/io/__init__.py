# Presentation files and JSON reports

# Group theory and cohomology components

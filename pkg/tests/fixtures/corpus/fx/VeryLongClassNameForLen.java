package fx;

class VeryLongClassNameForLen { }

// if while

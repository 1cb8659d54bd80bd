public class Broken {

    public int dangling() {
        int x = 1;
        return x;
    // closing brace for the method is missing, and the class never closes
